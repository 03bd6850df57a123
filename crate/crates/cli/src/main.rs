fn main() {
    std::process::exit(tracelens_cli::run(std::env::args_os()));
}
