fn main() {
    std::process::exit(gi_core::cli::run(std::env::args_os()));
}
