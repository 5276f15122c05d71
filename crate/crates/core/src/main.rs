fn main() {
    std::process::exit(simbias::cli::run(std::env::args_os()));
}
