fn main() {
    std::process::exit(bns_core::cli::main_with_args(std::env::args_os()));
}
