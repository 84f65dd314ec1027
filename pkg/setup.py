from setuptools import setup, find_packages

setup(
    name="lifetraces",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    package_data={"lifetraces": ["fixtures/*.yaml", "fixtures/*.txt"]},
    install_requires=[
        "numpy>=1.26.4",
        "pandas>=2.1.3",
        "python-dotenv>=1.0.0",
        "pyyaml>=6.0.1",
    ],
    extras_require={
        "sat": ["python-sat"],
        "test": ["pytest>=7.4.3"],
    },
    entry_points={
        'console_scripts': [
            'lifetraces=lifetraces.cli:main',
        ],
    },
    description="Trace automata, orphan search and semilinear preimages for 2-D cellular automata",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
)
