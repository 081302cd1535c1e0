fn main() {
    std::process::exit(cbp_cli::run(std::env::args_os()));
}
