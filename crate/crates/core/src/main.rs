use std::process::exit;

fn main() {
    exit(pliable_admm::cli::main_entry());
}
