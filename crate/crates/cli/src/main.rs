fn main() -> std::process::ExitCode {
    thaspec_cli::run()
}
