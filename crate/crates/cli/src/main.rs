fn main() {
    std::process::exit(hjlab_cli::run(std::env::args_os()));
}
