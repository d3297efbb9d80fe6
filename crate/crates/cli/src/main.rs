fn main() {
    std::process::exit(nvrepeater_cli::main_with(std::env::args_os()));
}
