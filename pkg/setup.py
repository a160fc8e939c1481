#! /usr/bin/env python
from setuptools import find_packages, setup

setup(
    name='knowprobe',
    version='0.1.0',
    description='Hallucination reasoning: tell aligned, misaligned and fabricated text apart',
    packages=find_packages(include=['knowprobe', 'knowprobe.*']),
    python_requires='>=3.8',
    install_requires=[
        'torch>=1.10',
        'numpy>=1.20',
        'scipy>=1.6',
        'pandas>=1.2',
        'scikit-learn>=0.24',
        'matplotlib>=3.3',
        'nltk>=3.6',
        'pyyaml>=5.4',
        'tqdm>=4.50',
    ],
    extras_require={
        'hf': ['transformers>=4.30'],
        'spacy': ['spacy>=3.0'],
        'test': ['pytest>=6.0'],
    },
    entry_points={
        'console_scripts': ['knowprobe=knowprobe.cli:main'],
    },
)
