#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup, find_packages

import os.path
import sys

sys.path.insert(0, os.path.abspath('.'))
from smartrag_lab.version import __version__


def long_description():
    """Read the project description from the README file.

    """
    with open(os.path.join(os.path.dirname(__file__), 'README.rst')) as f:
        return f.read()


setup(
    name='smartrag_lab',
    description='Desk scale laboratory for retrieve-or-answer policies',
    long_description=long_description(),
    version=__version__,
    author='see AUTHORS',
    keywords='retrieval question answering reinforcement learning PPO',
    license='BSD',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: BSD License',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        ],
    zip_safe=False,
    packages=find_packages(exclude=['tests', 'tests.*']),
    python_requires='>=3.8',
    setup_requires=['setuptools'],
    install_requires=['atom>=0.6', 'h5py>=2.5.0', 'numpy>=1.17', 'scipy',
                      'pyyaml'],
    extras_require={'test': ['pytest']},
    entry_points={
        'console_scripts':
        'smartrag-lab = smartrag_lab.cli:main'}
)
