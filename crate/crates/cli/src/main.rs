fn main() {
    std::process::exit(binstretch_cli::run(std::env::args_os()));
}
