fn main() -> std::process::ExitCode {
    bookcell::shell::main()
}
