fn main() {
    std::process::exit(corposcope_cli::run(std::env::args_os()));
}
