fn main() -> std::process::ExitCode {
    apgrid_plan::cli::main()
}
