fn main() -> std::process::ExitCode {
    stylekit::cli::main()
}
