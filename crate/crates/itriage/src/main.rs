fn main() -> std::process::ExitCode {
    itriage::cli::main()
}
