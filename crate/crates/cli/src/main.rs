fn main() {
    std::process::exit(zeno_sim::main_with_args(std::env::args_os()));
}
