from setuptools import setup

setup(
    name='voroperc',
    version='0.1.0',
    description='Monte Carlo simulation of Voronoi percolation: exact cell graphs, colouring models, '
                'events and estimators.',
    author='The voroperc developers',
    license="MIT",

    classifiers = [
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics"
        ],

    packages=[
        "voroperc",
        "voroperc.backends",
        "voroperc.tests",
    ],
    python_requires='>=3.8',
    install_requires=['numpy>=1.20', 'scipy>=1.7', 'networkx>=2.6'],
    entry_points={'console_scripts': ['voroperc = voroperc.cli:main']},
    test_suite='nose2.collector.collector',
    tests_require=['nose2'])
