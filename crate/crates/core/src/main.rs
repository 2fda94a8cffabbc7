fn main() {
    std::process::exit(specsense::cli::run(std::env::args()));
}
