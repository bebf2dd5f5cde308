fn main() {
    std::process::exit(memthermo_cli::run(std::env::args_os()));
}
