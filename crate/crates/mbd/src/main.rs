fn main() -> std::process::ExitCode {
    mbd::cli::main()
}
