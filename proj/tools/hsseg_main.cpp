#include "hsseg/pipeline.hpp"

int main(int argc, char** argv) { return hsseg::pipeline::cli_main(argc, argv); }
