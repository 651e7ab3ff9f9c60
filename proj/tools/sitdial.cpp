// Placeholder main while the library comes up; the full CLI lands with the
// experiment drivers.
int main() { return 0; }
