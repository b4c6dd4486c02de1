fn main() {
    std::process::exit(fsnc_cli::run(std::env::args_os()));
}
