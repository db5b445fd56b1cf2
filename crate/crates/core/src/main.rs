fn main() -> std::process::ExitCode {
    srff::cli::main_entry()
}
