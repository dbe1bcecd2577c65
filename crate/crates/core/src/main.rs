fn main() {
    std::process::exit(vortex_orbits::cli::main_entry());
}
