fn main() {
    std::process::exit(zmoment_cli::main_with(std::env::args_os()));
}
