fn main() {
    std::process::exit(honeycomb_dirac::cli::run(std::env::args().skip(1)));
}
