fn main() -> std::process::ExitCode {
    mmicp::cli::main_with_args(std::env::args_os())
}
