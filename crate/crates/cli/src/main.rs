fn main() {
    std::process::exit(spreach_cli::run(std::env::args_os()));
}
