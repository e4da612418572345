from setuptools import setup, find_packages

setup(
    name='satrag',
    version='0.1.0',
    description='Table-centric retrieval augmented generation over a subject/temporal/attribute graph',
    author='contributing authors',
    author_email='',
    license='BSD-3',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: BSD 3-Clause License'
    ],
    packages=find_packages(exclude=['*.tests']),
    package_data={
        'satrag.dataset_gen': ['prompts/*.txt'],
    },
    entry_points={
        'console_scripts': ['satrag = satrag.cli:main'],
    },
    install_requires=[
        'networkx >= 2.0',
        'numpy >= 1.8.0',
        'orca >= 1.1',
        'pandas >= 0.18.0',
        'psutil >= 4.1',
        'pyyaml >= 3.0',
        'requests >= 2.0',
        'tables >= 3.1.0',
        'toolz >= 0.7'
    ],
    extras_require={
        'test': ['pytest'],
    }
)
