fn main() {
    std::process::exit(navislim_cli::run(std::env::args_os()));
}
