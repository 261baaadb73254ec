fn main() {
    std::process::exit(stasep::cli::run(std::env::args().collect()));
}
