fn main() {
    std::process::exit(orbit_locator_cli::run(std::env::args()));
}
