fn main() {
    std::process::exit(riesz_lab::run(std::env::args()));
}
