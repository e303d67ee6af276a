fn main() {
    println!("bianchi");
}
