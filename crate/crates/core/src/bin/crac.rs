fn main() {
    std::process::exit(cracsim::cli::run(std::env::args_os()));
}
