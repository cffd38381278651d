fn main() {
    let code = dsa::cli::main_with_args(std::env::args_os(), dsa::engine::AlignerRegistry::with_builtins());
    std::process::exit(code);
}
