fn main() {
    std::process::exit(modsim::run::main_with_args(std::env::args_os()));
}
