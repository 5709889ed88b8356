fn main() {
    std::process::exit(ranslice_cli::execute(std::env::args_os()));
}
