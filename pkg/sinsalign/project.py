# fmt: off
name = 'sinsalign'
version = '0.1.0'
description = 'Self-alignment toolkit for strapdown inertial navigation'
requires_python = '>=3.12'
authors = [('Gabliz', 'gabliz.dev@gmail.com')]
# fmt: on
