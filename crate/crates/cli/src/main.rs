fn main() {
    std::process::exit(amdreg_cli::run(std::env::args_os()));
}
