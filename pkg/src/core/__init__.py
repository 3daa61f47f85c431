# Core realization engine: systems, Markov parameters, Hankel matrices, representations
