#!/usr/bin/env python
from setuptools import setup, find_packages

project_name = "mixhess"

setup(
    name=project_name,
    version="0.1",
    packages=find_packages(exclude=['tests']),
    install_requires=[
        'numpy>=1.19',
        'scipy>=1.12',
        'pydantic>=2',
        'sympy',
        'tqdm'
    ],
    extras_require={
        'test': ['pytest']
    },
    entry_points={
        'console_scripts': ['mixhess=mixhess.apps.cli:main']
    },
)
