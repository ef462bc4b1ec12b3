fn main() {
    std::process::exit(quasinil_cli::run(std::env::args_os()));
}
