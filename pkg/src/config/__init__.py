# Configuration modules for the switched-system realization toolkit
