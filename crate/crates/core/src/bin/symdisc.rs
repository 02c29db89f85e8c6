fn main() {
    std::process::exit(symmetry_discovery::cli::run(std::env::args_os()));
}
