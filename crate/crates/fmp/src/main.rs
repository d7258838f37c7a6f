fn main() -> std::process::ExitCode {
    fmp::cli::main()
}
