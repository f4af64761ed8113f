fn main() {
    std::process::exit(cogload_cli::run_from(std::env::args_os()));
}
