fn main() {
    std::process::exit(afnet::run(std::env::args_os()));
}
