fn main() {
    std::process::exit(glhelix::cli::run(std::env::args().collect()));
}
