fn main() {
    std::process::exit(curvebif_cli::run(std::env::args_os()));
}
