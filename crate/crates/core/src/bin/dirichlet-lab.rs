fn main() {
    std::process::exit(dirichlet_lab::cli::main_with(std::env::args_os()));
}
