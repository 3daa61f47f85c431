# Brute-force references and random system generators used by the test suite
