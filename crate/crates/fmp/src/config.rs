//! Scenario files: the JSON schema accepted by `fmp run` and emitted by `fmp gen`.

use std::path::Path;

use fmp_core::model::{VelocitySchedule, DEFAULT_END_MAX_DIS, DEFAULT_OBSTACLE_CLEARANCE, DEFAULT_RHO};
use fmp_core::{Dim, Obstacle, Scenario, Tunables, VecD, VelocityLimit};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed JSON or a field of the wrong shape.
    #[error("{origin}: line {line}, column {column}, at `{path}`: {message}")]
    Parse {
        origin: String,
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("obstacle {index}: give either `velocity` or `schedule`, not both")]
    ObstacleMotion { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub center: VecD,
    pub radius: f64,
    /// Constant velocity from `t = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<VecD>,
    /// `[start_time, velocity]` segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<(f64, VecD)>>,
}

/// On-disk scenario. Omitted tunables take the library defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: Dim,
    pub starts: Vec<VecD>,
    pub goals: Vec<VecD>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleSpec>,
    pub d_star: f64,
    /// A number, or `{"horizontal": .., "up": .., "down": ..}`.
    pub v_max: VelocityLimit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_max_dis: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sim_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_hat_star: Option<f64>,
    #[serde(default)]
    pub preassigned: bool,
    /// Seed of the start-position jitter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse {
                origin: origin.to_owned(),
                path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })
    }

    /// Captures a generated scenario together with the tunables it was built for.
    pub fn from_parts(scenario: &Scenario, t: &Tunables) -> Self {
        let obstacles = scenario
            .obstacles
            .iter()
            .map(|o| {
                let (velocity, schedule) = match o.schedule.segments.as_slice() {
                    [] => (None, None),
                    [(start, v)] if *start == 0.0 => (Some(*v), None),
                    segs => (None, Some(segs.to_vec())),
                };
                ObstacleSpec {
                    center: o.center,
                    radius: o.radius,
                    velocity,
                    schedule,
                }
            })
            .collect();
        Self {
            name: Some(scenario.name.clone()),
            dim: scenario.dim,
            starts: scenario.starts.clone(),
            goals: scenario.goals.clone(),
            obstacles,
            d_star: t.d_star,
            v_max: t.v_limit,
            c1: Some(t.c1),
            c2: Some(t.c2),
            rho: (t.rho != DEFAULT_RHO).then_some(t.rho),
            dt: Some(t.dt),
            end_max_dis: (t.end_max_dis != DEFAULT_END_MAX_DIS).then_some(t.end_max_dis),
            max_sim_time: t.max_sim_time,
            rho_hat: t.rho_hat,
            r_hat: t.r_hat,
            d_hat_star: (t.d_hat_star != DEFAULT_OBSTACLE_CLEARANCE).then_some(t.d_hat_star),
            preassigned: scenario.preassigned,
            seed: None,
            jitter: None,
        }
    }

    pub fn tunables(&self) -> Tunables {
        let mut t = Tunables::new(self.d_star, self.v_max);
        if let Some(c1) = self.c1 {
            t = t.with_gains(c1, self.c2);
        } else if let Some(c2) = self.c2 {
            t.c2 = c2;
        }
        if let Some(v) = self.rho {
            t.rho = v;
        }
        if let Some(v) = self.dt {
            t.dt = v;
        }
        if let Some(v) = self.end_max_dis {
            t.end_max_dis = v;
        }
        if let Some(v) = self.d_hat_star {
            t.d_hat_star = v;
        }
        t.max_sim_time = self.max_sim_time;
        t.rho_hat = self.rho_hat;
        t.r_hat = self.r_hat;
        t
    }

    pub fn scenario(&self, fallback_name: &str) -> Result<Scenario, ConfigError> {
        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        for (index, o) in self.obstacles.iter().enumerate() {
            let schedule = match (&o.velocity, &o.schedule) {
                (Some(_), Some(_)) => return Err(ConfigError::ObstacleMotion { index }),
                (Some(v), None) => VelocitySchedule::constant(*v),
                (None, Some(segs)) => VelocitySchedule { segments: segs.clone() },
                (None, None) => VelocitySchedule::default(),
            };
            obstacles.push(Obstacle {
                center: o.center,
                radius: o.radius,
                schedule,
            });
        }
        let name = self.name.clone().unwrap_or_else(|| fallback_name.to_owned());
        Ok(Scenario::new(name, self.dim, self.starts.clone(), self.goals.clone())
            .with_obstacles(obstacles)
            .preassigned(self.preassigned))
    }

    pub fn resolve(&self, fallback_name: &str) -> Result<(Scenario, Tunables), ConfigError> {
        Ok((self.scenario(fallback_name)?, self.tunables()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }
}
