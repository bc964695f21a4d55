fn main() {
    std::process::exit(nlphase_cli::main_with(std::env::args_os()));
}
