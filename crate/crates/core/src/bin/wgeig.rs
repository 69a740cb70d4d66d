fn main() {
    std::process::exit(wgeig::expcli::run_cli(std::env::args_os()));
}
