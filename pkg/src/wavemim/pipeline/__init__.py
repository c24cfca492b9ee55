"""CLI, I/O formats, synthetic corpus, optimizer, training loop, and
verification suites."""
