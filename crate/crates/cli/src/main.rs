fn main() {
    std::process::exit(bowendim_cli::main_with(std::env::args_os()));
}
