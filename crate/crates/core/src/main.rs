fn main() {
    std::process::exit(antsight::cli::run(std::env::args_os()));
}
