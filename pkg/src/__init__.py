# Switched linear system realization toolkit
