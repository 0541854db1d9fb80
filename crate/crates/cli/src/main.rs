mod commands;
mod input;
mod report;

fn main() {
    std::process::exit(commands::run(std::env::args_os()));
}
