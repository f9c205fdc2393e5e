fn main() {
    std::process::exit(qgraph::cli::main_entry(std::env::args_os()));
}
